#pragma once

#include "cbm/core.hpp"
#include "cbm/problem.hpp"
#include "cbm/schedule.hpp"
#include "cbm/fitness.hpp"
#include "cbm/operators.hpp"
#include "cbm/agent.hpp"
#include "cbm/message.hpp"
#include "cbm/transport.hpp"
#include "cbm/tcp_transport.hpp"
#include "cbm/coalition.hpp"
#include "cbm/milp.hpp"
#include "cbm/bench.hpp"
#include "cbm/cli.hpp"
#include "cbm/instance_io.hpp"
#include "cbm/manifest.hpp"
