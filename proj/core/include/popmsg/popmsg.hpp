#pragma once

#include "popmsg/analysis.hpp"
#include "popmsg/balls.hpp"
#include "popmsg/basic_protocols.hpp"
#include "popmsg/broadcast.hpp"
#include "popmsg/counting.hpp"
#include "popmsg/dyadic.hpp"
#include "popmsg/junta.hpp"
#include "popmsg/model.hpp"
#include "popmsg/open_wrap.hpp"
#include "popmsg/reachability.hpp"
#include "popmsg/runner.hpp"
#include "popmsg/sce.hpp"
#include "popmsg/scheduler.hpp"
#include "popmsg/trials.hpp"
#include "popmsg/turing.hpp"
