#pragma once

#include "conles/alignment_io.hpp"
#include "conles/bench.hpp"
#include "conles/cost.hpp"
#include "conles/engine.hpp"
#include "conles/errors.hpp"
#include "conles/event_log.hpp"
#include "conles/generator.hpp"
#include "conles/petri_net.hpp"
#include "conles/pnml.hpp"
#include "conles/reach_analysis.hpp"
#include "conles/search.hpp"
#include "conles/sync_product.hpp"
