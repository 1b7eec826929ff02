#pragma once

#include "singsl/scaled.hpp"
#include "singsl/special_functions.hpp"
#include "singsl/quadrature.hpp"
#include "singsl/coefficients.hpp"
#include "singsl/solutions.hpp"
#include "singsl/spectrum.hpp"
#include "singsl/pseudomodes.hpp"
#include "singsl/resolvent.hpp"
#include "singsl/parallel.hpp"
