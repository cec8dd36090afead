#pragma once

#include "stgraph/annotations.hpp"
#include "stgraph/assignment.hpp"
#include "stgraph/config.hpp"
#include "stgraph/errors.hpp"
#include "stgraph/geometry.hpp"
#include "stgraph/grpo.hpp"
#include "stgraph/jsonl.hpp"
#include "stgraph/qa.hpp"
#include "stgraph/qa_gen.hpp"
#include "stgraph/random.hpp"
#include "stgraph/response.hpp"
#include "stgraph/rewards.hpp"
#include "stgraph/scene_graph.hpp"
