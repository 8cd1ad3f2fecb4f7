#pragma once

#include "trapscape/corrugation.hpp"
#include "trapscape/crystal.hpp"
#include "trapscape/dc_control.hpp"
#include "trapscape/errors.hpp"
#include "trapscape/fields.hpp"
#include "trapscape/geometry.hpp"
#include "trapscape/log.hpp"
#include "trapscape/modes.hpp"
#include "trapscape/nodes.hpp"
#include "trapscape/parallel.hpp"
#include "trapscape/units.hpp"
#include "trapscape/version.hpp"
