#pragma once

#include "pitchfork/error.hpp"
#include "pitchfork/taylor.hpp"
#include "pitchfork/expr.hpp"
#include "pitchfork/field.hpp"
#include "pitchfork/matrix.hpp"
#include "pitchfork/equilibria.hpp"
#include "pitchfork/index.hpp"
#include "pitchfork/centerman.hpp"
#include "pitchfork/criteria.hpp"
#include "pitchfork/transform.hpp"
#include "pitchfork/report.hpp"
