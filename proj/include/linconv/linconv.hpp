#pragma once

#include "catalogue.hpp"
#include "errors.hpp"
#include "family.hpp"
#include "feasibility.hpp"
#include "inclusion.hpp"
#include "lasalle.hpp"
#include "linalg.hpp"
#include "lmi.hpp"
#include "lti.hpp"
#include "parallel.hpp"
#include "report.hpp"
#include "sim.hpp"
#include "verdict.hpp"
