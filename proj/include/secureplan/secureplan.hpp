#pragma once

#include <secureplan/abstraction.hpp>
#include <secureplan/buchi.hpp>
#include <secureplan/common.hpp>
#include <secureplan/feasibility.hpp>
#include <secureplan/geometry.hpp>
#include <secureplan/lp.hpp>
#include <secureplan/ltl.hpp>
#include <secureplan/oracle.hpp>
#include <secureplan/pipeline.hpp>
#include <secureplan/planner.hpp>
#include <secureplan/qp.hpp>
#include <secureplan/scenario.hpp>
#include <secureplan/transition_system.hpp>
