#pragma once

#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "stericpb/closure.hpp"
#include "stericpb/errors.hpp"
#include "stericpb/species.hpp"

namespace stericpb {

/// Generalized Boltzmann data sampled on a uniform potential mesh
/// p_i = psi_min + i h. Stores log(gamma), d(log gamma)/du and the cumulative
/// integral of the net charge density q(u) = sum(z_l c_l); concentrations and
/// their derivatives are reconstructed from the interpolated values. Queries
/// outside the mesh clamp to the endpoints and increment a saturation count.
class StericTable {
  public:
    static StericTable build(const BulkState& bulk, double psi_min, double psi_max,
                             long long n_intervals, double tol_gamma = 1e-14) {
        if (!(psi_min < psi_max))
            throw std::invalid_argument("StericTable: need psi_min < psi_max");
        if (n_intervals < 4) throw std::invalid_argument("StericTable: need at least 4 intervals");
        StericTable t;
        t.bulk_ = bulk;
        t.psi_min_ = psi_min;
        t.psi_max_ = psi_max;
        t.n_ = n_intervals;
        t.h_ = (psi_max - psi_min) / static_cast<double>(n_intervals);
        t.tol_ = tol_gamma;

        const long long fine_count = 2 * n_intervals + 1;  // half-step sweep
        const double hf = 0.5 * t.h_;
        const int m = bulk.count();
        std::vector<double> c(static_cast<size_t>(m));
        std::vector<double> fine_q(static_cast<size_t>(fine_count));

        t.log_gamma_.resize(static_cast<size_t>(n_intervals + 1));
        t.slope_.resize(static_cast<size_t>(n_intervals + 1));
        t.integral_.resize(static_cast<size_t>(n_intervals + 1));

        // Continuation sweep: each solve starts from the previous root.
        std::optional<double> prev;
        for (long long f = 0; f < fine_count; ++f) {
            const double u = psi_min + f * hf;
            GammaResult r;
            try {
                r = solve_gamma_log(u, bulk, prev, tol_gamma);
            } catch (const NumericalError& e) {
                throw NumericalError("StericTable: gamma solve failed at node u=" +
                                         std::to_string(u) + ": " + e.what(),
                                     e.last_residual);
            }
            prev = r.log_gamma;
            concentrations_from_log_gamma(r.log_gamma, u, bulk, c.data());
            double q = 0.0;
            for (int l = 0; l < m; ++l) q += bulk.species[static_cast<size_t>(l)].valence * c[l];
            fine_q[static_cast<size_t>(f)] = q;
            if (f % 2 == 0) {
                const long long i = f / 2;
                t.log_gamma_[static_cast<size_t>(i)] = r.log_gamma;
                t.slope_[static_cast<size_t>(i)] = log_gamma_slope(r.gamma, c.data(), bulk);
            }
        }
        // Per-interval Simpson accumulation of q.
        t.integral_[0] = 0.0;
        for (long long i = 0; i < n_intervals; ++i)
            t.integral_[static_cast<size_t>(i + 1)] =
                t.integral_[static_cast<size_t>(i)] +
                t.h_ / 6.0 *
                    (fine_q[static_cast<size_t>(2 * i)] + 4.0 * fine_q[static_cast<size_t>(2 * i + 1)] +
                     fine_q[static_cast<size_t>(2 * i + 2)]);

        t.check_smoothness();
        return t;
    }

    struct Sample {
        double gamma = 1.0;
        double log_gamma = 0.0;
        double slope = 0.0;        // d(log gamma)/du
        double gamma_prime = 0.0;  // gamma * slope
        double net_charge = 0.0;   // sum z_l c_l, ions/A^3
        double net_charge_deriv = 0.0;
        double charge_integral = 0.0;  // cumulative from psi_min
        bool clamped = false;
    };

    /// Four-point local cubic interpolation of log(gamma), slope and the
    /// charge integral; node queries reproduce stored values exactly.
    Sample eval(double u) const {
        Sample s;
        double uq = u;
        if (uq < psi_min_ || uq > psi_max_) {
            uq = std::clamp(uq, psi_min_, psi_max_);
            s.clamped = true;
            saturated_.fetch_add(1, std::memory_order_relaxed);
        }
        double w[4];
        long long base = 0;
        weights(uq, base, w);
        s.log_gamma = dot4(log_gamma_, base, w);
        s.slope = dot4(slope_, base, w);
        s.charge_integral = dot4(integral_, base, w);
        s.gamma = std::exp(s.log_gamma);
        s.gamma_prime = s.gamma * s.slope;

        const int m = bulk_.count();
        for (int l = 0; l < m; ++l) {
            const auto& sp = bulk_.species[static_cast<size_t>(l)];
            const double ratio = sp.volume / bulk_.solvent_volume;
            const double c = capped_exp(std::log(sp.bulk_density) +
                                        ratio * (s.log_gamma - bulk_.log_gamma_inf) -
                                        sp.valence * uq);
            s.net_charge += sp.valence * c;
            s.net_charge_deriv += sp.valence * (ratio * s.slope - sp.valence) * c;
        }
        // beyond the mesh the charge density is saturated, so the integral
        // continues linearly with the endpoint charge
        if (s.clamped) s.charge_integral += s.net_charge * (u - uq);
        return s;
    }

    void concentrations(double u, double* c) const {
        const double uq = std::clamp(u, psi_min_, psi_max_);
        double w[4];
        long long base = 0;
        weights(uq, base, w);
        concentrations_from_log_gamma(dot4(log_gamma_, base, w), uq, bulk_, c);
    }

    /// Max deviation between the stored analytic slope and the five-point
    /// stencil applied to the stored log(gamma) samples (validation pass).
    double slope_stencil_deviation() const {
        double worst = 0.0;
        for (long long i = 2; i + 2 <= n_; ++i) {
            const double stencil =
                (-log_gamma_[static_cast<size_t>(i + 2)] + 8.0 * log_gamma_[static_cast<size_t>(i + 1)] -
                 8.0 * log_gamma_[static_cast<size_t>(i - 1)] + log_gamma_[static_cast<size_t>(i - 2)]) /
                (12.0 * h_);
            worst = std::max(worst, std::abs(stencil - slope_[static_cast<size_t>(i)]));
        }
        return worst;
    }

    double psi_min() const { return psi_min_; }
    double psi_max() const { return psi_max_; }
    long long intervals() const { return n_; }
    double spacing() const { return h_; }
    const BulkState& bulk() const { return bulk_; }
    double node(long long i) const { return psi_min_ + i * h_; }
    double node_log_gamma(long long i) const { return log_gamma_[static_cast<size_t>(i)]; }
    double node_slope(long long i) const { return slope_[static_cast<size_t>(i)]; }
    double node_integral(long long i) const { return integral_[static_cast<size_t>(i)]; }
    long long saturation_count() const { return saturated_.load(); }

    StericTable(const StericTable& o)
        : bulk_(o.bulk_), psi_min_(o.psi_min_), psi_max_(o.psi_max_), h_(o.h_), n_(o.n_),
          tol_(o.tol_), log_gamma_(o.log_gamma_), slope_(o.slope_), integral_(o.integral_),
          saturated_(o.saturated_.load()) {}
    StericTable& operator=(const StericTable& o) {
        if (this != &o) {
            bulk_ = o.bulk_; psi_min_ = o.psi_min_; psi_max_ = o.psi_max_; h_ = o.h_;
            n_ = o.n_; tol_ = o.tol_; log_gamma_ = o.log_gamma_; slope_ = o.slope_;
            integral_ = o.integral_; saturated_.store(o.saturated_.load());
        }
        return *this;
    }

    void dump(std::ostream& out) const {
        out << "stericpb-table 1\n" << std::setprecision(17);
        out << "solvent_volume " << bulk_.solvent_volume << "\n";
        out << "species " << bulk_.count() << "\n";
        for (const auto& sp : bulk_.species)
            out << sp.valence << " " << sp.volume << " " << sp.bulk_density << "\n";
        out << "range " << psi_min_ << " " << psi_max_ << " " << n_ << "\n";
        out << "tol " << tol_ << "\n";
        for (long long i = 0; i <= n_; ++i)
            out << log_gamma_[static_cast<size_t>(i)] << " " << slope_[static_cast<size_t>(i)]
                << " " << integral_[static_cast<size_t>(i)] << "\n";
    }

    static StericTable load(std::istream& in) {
        std::string magic;
        int version = 0;
        in >> magic >> version;
        if (magic != "stericpb-table" || version != 1)
            throw ConfigError("not a steric table file");
        std::string key;
        double v0 = 0.0;
        int m = 0;
        in >> key >> v0;
        if (key != "solvent_volume") throw ConfigError("malformed table header");
        in >> key >> m;
        if (key != "species" || m < 0) throw ConfigError("malformed table header");
        std::vector<IonSpecies> species(static_cast<size_t>(m));
        for (auto& sp : species) in >> sp.valence >> sp.volume >> sp.bulk_density;
        StericTable t;
        t.bulk_ = make_bulk(species, v0);
        in >> key >> t.psi_min_ >> t.psi_max_ >> t.n_;
        if (key != "range" || t.n_ < 4) throw ConfigError("malformed table range");
        in >> key >> t.tol_;
        if (key != "tol") throw ConfigError("malformed table header");
        t.h_ = (t.psi_max_ - t.psi_min_) / static_cast<double>(t.n_);
        t.log_gamma_.resize(static_cast<size_t>(t.n_ + 1));
        t.slope_.resize(static_cast<size_t>(t.n_ + 1));
        t.integral_.resize(static_cast<size_t>(t.n_ + 1));
        for (long long i = 0; i <= t.n_; ++i)
            if (!(in >> t.log_gamma_[static_cast<size_t>(i)] >> t.slope_[static_cast<size_t>(i)] >>
                  t.integral_[static_cast<size_t>(i)]))
                throw ConfigError("table file truncated at node " + std::to_string(i));
        return t;
    }

    /// Loaded tables must describe the same mixture as the run.
    bool matches(const BulkState& other, double rel_tol = 1e-12) const {
        if (other.count() != bulk_.count()) return false;
        const auto close = [rel_tol](double a, double b) {
            return std::abs(a - b) <= rel_tol * std::max(1.0, std::max(std::abs(a), std::abs(b)));
        };
        if (!close(other.solvent_volume, bulk_.solvent_volume)) return false;
        for (int l = 0; l < bulk_.count(); ++l) {
            const auto& a = bulk_.species[static_cast<size_t>(l)];
            const auto& b = other.species[static_cast<size_t>(l)];
            if (a.valence != b.valence || !close(a.volume, b.volume) ||
                !close(a.bulk_density, b.bulk_density))
                return false;
        }
        return true;
    }

  private:
    StericTable() = default;

    void weights(double u, long long& base, double w[4]) const {
        long long j = static_cast<long long>(std::floor((u - psi_min_) / h_));
        j = std::clamp(j, static_cast<long long>(0), n_ - 1);
        base = std::clamp(j - 1, static_cast<long long>(0), n_ - 3);
        double p[4];
        for (int a = 0; a < 4; ++a) p[a] = psi_min_ + (base + a) * h_;
        for (int a = 0; a < 4; ++a) {
            double num = 1.0, den = 1.0;
            for (int bIdx = 0; bIdx < 4; ++bIdx) {
                if (bIdx == a) continue;
                num *= (u - p[bIdx]);
                den *= (p[a] - p[bIdx]);
            }
            w[a] = num / den;
        }
    }

    static double dot4(const std::vector<double>& v, long long base, const double w[4]) {
        return w[0] * v[static_cast<size_t>(base)] + w[1] * v[static_cast<size_t>(base + 1)] +
               w[2] * v[static_cast<size_t>(base + 2)] + w[3] * v[static_cast<size_t>(base + 3)];
    }

    /// Adjacent log(gamma) jumps must be explained by the sampled slopes;
    /// catches a solve landing on a spurious branch.
    void check_smoothness() const {
        for (long long i = 0; i + 1 <= n_; ++i) {
            const double jump = std::abs(log_gamma_[static_cast<size_t>(i + 1)] -
                                         log_gamma_[static_cast<size_t>(i)]);
            const double bound =
                h_ * (2.0 * std::max(std::abs(slope_[static_cast<size_t>(i)]),
                                     std::abs(slope_[static_cast<size_t>(i + 1)])) +
                      0.1) +
                1e-9;
            if (jump > bound)
                throw NumericalError("StericTable: non-smooth gamma samples near u=" +
                                     std::to_string(node(i)));
        }
    }

    BulkState bulk_;
    double psi_min_ = 0.0, psi_max_ = 0.0, h_ = 0.0;
    long long n_ = 0;
    double tol_ = 0.0;
    std::vector<double> log_gamma_, slope_, integral_;
    mutable std::atomic<long long> saturated_{0};
};

/// Closure backed by a precomputed table.
class TableClosure final : public PotentialClosure {
  public:
    explicit TableClosure(const StericTable& table) : table_(table) {}

    int species_count() const override { return table_.bulk().count(); }
    void net_charge(double u, double& q, double& dq) const override {
        const StericTable::Sample s = table_.eval(u);
        q = s.net_charge;
        dq = s.net_charge_deriv;
    }
    void concentrations(double u, double* c) const override { table_.concentrations(u, c); }
    bool has_charge_integral() const override { return true; }
    double charge_integral(double u) const override { return table_.eval(u).charge_integral; }
    long long saturation_count() const override { return table_.saturation_count(); }

  private:
    const StericTable& table_;
};

}  // namespace stericpb
