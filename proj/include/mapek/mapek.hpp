#pragma once

#include "mapek/core.hpp"
#include "mapek/messages.hpp"
#include "mapek/kernel.hpp"
#include "mapek/energy.hpp"
#include "mapek/allocation.hpp"
#include "mapek/oracle.hpp"
#include "mapek/agents.hpp"
#include "mapek/datacenter.hpp"
#include "mapek/simulation.hpp"
#include "mapek/scenario.hpp"
#include "mapek/report.hpp"
