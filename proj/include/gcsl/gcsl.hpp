#pragma once

#include "gcsl/covariance.hpp"
#include "gcsl/detect.hpp"
#include "gcsl/error.hpp"
#include "gcsl/gaussian.hpp"
#include "gcsl/numlin.hpp"
#include "gcsl/rng.hpp"
#include "gcsl/spectral.hpp"
#include "gcsl/sublinear.hpp"
#include "gcsl/typicality.hpp"
#include "gcsl/units.hpp"
