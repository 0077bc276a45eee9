#pragma once

#include "stericpb/assembly.hpp"
#include "stericpb/closure.hpp"
#include "stericpb/config.hpp"
#include "stericpb/dielectric.hpp"
#include "stericpb/errors.hpp"
#include "stericpb/field_io.hpp"
#include "stericpb/grid.hpp"
#include "stericpb/linsolve.hpp"
#include "stericpb/newton.hpp"
#include "stericpb/pipeline.hpp"
#include "stericpb/postproc.hpp"
#include "stericpb/solute.hpp"
#include "stericpb/species.hpp"
#include "stericpb/steric_table.hpp"
#include "stericpb/units.hpp"
