#pragma once

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>
#include <cstdint>
#include <string_view>

namespace pmrm {

// Boost's engines and distributions are specified algorithmically, so a seed
// yields the same stream on every platform and standard library.
using Rng = boost::random::mt19937_64;

inline constexpr std::string_view kRngIdentifier =
    "boost::random::mt19937_64; normals via boost::random::normal_distribution (ziggurat); "
    "replication seed = base_seed + index";

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

inline double standard_normal(Rng& rng) {
  boost::random::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

}  // namespace pmrm
