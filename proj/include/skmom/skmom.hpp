#pragma once

#include "skmom/errors.hpp"
#include "skmom/exact_moments.hpp"
#include "skmom/gauss_hermite.hpp"
#include "skmom/io.hpp"
#include "skmom/log_sum_exp.hpp"
#include "skmom/spin.hpp"
#include "skmom/talagrand.hpp"
#include "skmom/variational.hpp"

namespace skmom {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace skmom
