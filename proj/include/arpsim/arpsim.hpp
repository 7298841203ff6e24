#pragma once

#include "arpsim/acl.hpp"
#include "arpsim/arp_cache.hpp"
#include "arpsim/arp_server.hpp"
#include "arpsim/attacker.hpp"
#include "arpsim/event_log.hpp"
#include "arpsim/frame.hpp"
#include "arpsim/host.hpp"
#include "arpsim/scenario.hpp"
#include "arpsim/sim_time.hpp"
#include "arpsim/simulator.hpp"
#include "arpsim/switch.hpp"
