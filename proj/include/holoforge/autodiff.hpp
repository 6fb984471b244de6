#pragma once

// Reverse-mode automatic differentiation over the real/complex tensor
// operations used by the solver and the learned pipeline.

#include "holoforge/autodiff/tensor.hpp"
#include "holoforge/autodiff/ops.hpp"
#include "holoforge/autodiff/ops_nn.hpp"
#include "holoforge/autodiff/gradcheck.hpp"
