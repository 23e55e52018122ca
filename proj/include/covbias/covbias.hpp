#pragma once

#include "covbias/adequacy_fmeasure.hpp"
#include "covbias/corpus_io.hpp"
#include "covbias/data_prep.hpp"
#include "covbias/error.hpp"
#include "covbias/fluency_abstraction.hpp"
#include "covbias/ngram_lm.hpp"
#include "covbias/origin_detect.hpp"
#include "covbias/reports.hpp"
#include "covbias/version.hpp"
#include "covbias/vocab_divergence.hpp"
#include "covbias/word_classes.hpp"
