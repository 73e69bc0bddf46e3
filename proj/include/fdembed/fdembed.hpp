#pragma once

#include "fdembed/error.hpp"
#include "fdembed/graph.hpp"
#include "fdembed/similarity.hpp"
#include "fdembed/linalg.hpp"
#include "fdembed/metrics.hpp"
#include "fdembed/embedding.hpp"
#include "fdembed/sketch.hpp"
#include "fdembed/checkpoint.hpp"
#include "fdembed/eval.hpp"
#include "fdembed/cli.hpp"
