#pragma once

#include "recomb/closed_form.hpp"
#include "recomb/coefficients.hpp"
#include "recomb/csv.hpp"
#include "recomb/dynamics.hpp"
#include "recomb/errors.hpp"
#include "recomb/lattice.hpp"
#include "recomb/measure.hpp"
#include "recomb/partition.hpp"
#include "recomb/partitioning.hpp"
