#pragma once

// Umbrella header.
#include "parlstance/bayes.hpp"
#include "parlstance/chat_client.hpp"
#include "parlstance/corpus.hpp"
#include "parlstance/evaluation.hpp"
#include "parlstance/experiment.hpp"
#include "parlstance/lowess.hpp"
#include "parlstance/prediction.hpp"
#include "parlstance/prompt.hpp"
#include "parlstance/report.hpp"
#include "parlstance/split.hpp"
