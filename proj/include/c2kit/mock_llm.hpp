#pragma once

#include "c2kit/llm_gateway.hpp"

namespace c2kit {

/// Offline stand-in for a chat model that understands the five default
/// templates. Answers are a pure function of the request, so a pipeline run
/// against it is reproducible. Trees are synthesized from the base query's
/// content words; coverage queries quote the background subquery; candidate
/// outlines are drawn from the enumerated outline set of the tree; judge
/// scores favour outlines that honour the intent. A few requests get an
/// invalid candidate so the rejection paths are exercised.
MockProvider::Responder synthetic_responder();

}  // namespace c2kit
