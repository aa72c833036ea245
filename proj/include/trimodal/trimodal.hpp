#pragma once

// Umbrella header for the tri-modal hybrid retrieval library.

#include "trimodal/beir.hpp"
#include "trimodal/config.hpp"
#include "trimodal/digest.hpp"
#include "trimodal/encoder.hpp"
#include "trimodal/entities.hpp"
#include "trimodal/error.hpp"
#include "trimodal/fusion.hpp"
#include "trimodal/http_clients.hpp"
#include "trimodal/index.hpp"
#include "trimodal/index_io.hpp"
#include "trimodal/lexical.hpp"
#include "trimodal/metrics.hpp"
#include "trimodal/pipeline.hpp"
#include "trimodal/rerank.hpp"
#include "trimodal/run_io.hpp"
#include "trimodal/types.hpp"
