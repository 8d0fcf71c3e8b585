#ifndef DNAGRF_DNAGRF_HPP
#define DNAGRF_DNAGRF_HPP

#include "covariance.hpp"
#include "field.hpp"
#include "io.hpp"
#include "ndarray.hpp"
#include "periodisation.hpp"
#include "rng.hpp"
#include "sampler.hpp"
#include "spde_fem.hpp"
#include "stats.hpp"
#include "transforms.hpp"

#endif  // DNAGRF_DNAGRF_HPP
