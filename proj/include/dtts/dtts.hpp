// Copyright 2026 the dtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
#pragma once

#include "dtts/aligner.hpp"
#include "dtts/core.hpp"
#include "dtts/decoder.hpp"
#include "dtts/diffcheck.hpp"
#include "dtts/evalbench.hpp"
#include "dtts/gradcheck_registry.hpp"
#include "dtts/io.hpp"
#include "dtts/losses.hpp"
#include "dtts/mel.hpp"
#include "dtts/optim.hpp"
#include "dtts/scorer.hpp"
#include "dtts/signal.hpp"
#include "dtts/softdtw.hpp"
#include "dtts/stft.hpp"
#include "dtts/text.hpp"
#include "dtts/toytask.hpp"
#include "dtts/trainer.hpp"
#include "dtts/wav.hpp"
