// swt.hpp — umbrella header for the symbolic engine, the numeric oracle and the model tooling.

#pragma once

#include "swt/errors.hpp"
#include "swt/scalar_field.hpp"
#include "swt/expression.hpp"
#include "swt/operator_algebra.hpp"
#include "swt/swt_core.hpp"
#include "swt/numeric_oracle.hpp"
#include "swt/render.hpp"
#include "swt/model.hpp"
#include "swt/commands.hpp"
