#pragma once

#include "errors.hpp"
#include "rational.hpp"
#include "exact_linalg.hpp"
#include "tensor_space.hpp"
#include "cancellation.hpp"
#include "tree_model.hpp"
#include "random.hpp"
#include "martingale.hpp"
#include "witnesses.hpp"
#include "fourier.hpp"
#include "instances.hpp"
#include "runner.hpp"
