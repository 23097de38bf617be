#pragma once

#include "l2o/linalg.hpp"
#include "l2o/problem.hpp"
#include "l2o/model.hpp"
#include "l2o/grad.hpp"
#include "l2o/init.hpp"
#include "l2o/theory.hpp"
#include "l2o/train.hpp"
#include "l2o/io.hpp"
#include "l2o/svg.hpp"
