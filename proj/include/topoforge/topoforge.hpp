#pragma once

#include "topoforge/error.hpp"
#include "topoforge/rng.hpp"
#include "topoforge/waveform.hpp"
#include "topoforge/circuit_model.hpp"
#include "topoforge/component_graph.hpp"
#include "topoforge/simulator.hpp"
#include "topoforge/objective.hpp"
#include "topoforge/powell.hpp"
#include "topoforge/parallel.hpp"
#include "topoforge/simplify.hpp"
#include "topoforge/relaxation.hpp"
#include "topoforge/search.hpp"
#include "topoforge/netlist_json.hpp"
