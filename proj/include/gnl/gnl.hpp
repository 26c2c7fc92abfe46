// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "gnl/attention.hpp"
#include "gnl/checkpoint.hpp"
#include "gnl/config.hpp"
#include "gnl/data.hpp"
#include "gnl/errors.hpp"
#include "gnl/export.hpp"
#include "gnl/gdu.hpp"
#include "gnl/grad_check.hpp"
#include "gnl/lasso.hpp"
#include "gnl/metrics.hpp"
#include "gnl/model.hpp"
#include "gnl/model_check.hpp"
#include "gnl/optim.hpp"
#include "gnl/synthetic.hpp"
#include "gnl/tape.hpp"
#include "gnl/tensor.hpp"
#include "gnl/train.hpp"
