#pragma once

#include "ttrk/autodiff.hpp"
#include "ttrk/corpus.hpp"
#include "ttrk/encoder.hpp"
#include "ttrk/eval.hpp"
#include "ttrk/gradcheck.hpp"
#include "ttrk/heads.hpp"
#include "ttrk/model.hpp"
#include "ttrk/model_io.hpp"
#include "ttrk/optim.hpp"
#include "ttrk/pipeline.hpp"
#include "ttrk/report.hpp"
#include "ttrk/rng.hpp"
#include "ttrk/synth.hpp"
#include "ttrk/tensor.hpp"
#include "ttrk/textenc.hpp"
#include "ttrk/topic.hpp"
#include "ttrk/types.hpp"
