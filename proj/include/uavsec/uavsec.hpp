#pragma once

#include "uavsec/errors.hpp"
#include "uavsec/model.hpp"
#include "uavsec/convex.hpp"
#include "uavsec/power.hpp"
#include "uavsec/trajectory.hpp"
#include "uavsec/bcd.hpp"
#include "uavsec/oracle.hpp"
#include "uavsec/io.hpp"
