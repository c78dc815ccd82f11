#ifndef CNBDA_CNBDA_HPP
#define CNBDA_CNBDA_HPP

#include "cnbda/experiments.hpp"
#include "cnbda/fit.hpp"
#include "cnbda/io.hpp"
#include "cnbda/network.hpp"
#include "cnbda/oada.hpp"
#include "cnbda/optimize.hpp"
#include "cnbda/parallel.hpp"
#include "cnbda/profile.hpp"
#include "cnbda/random.hpp"
#include "cnbda/rules.hpp"
#include "cnbda/simulate.hpp"

namespace cnbda {
inline constexpr const char* kVersion = "0.1.0";
} // namespace cnbda

#endif // CNBDA_CNBDA_HPP
