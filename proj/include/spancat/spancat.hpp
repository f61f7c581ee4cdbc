#pragma once

#include "spancat/audit.hpp"
#include "spancat/checkpoint.hpp"
#include "spancat/config.hpp"
#include "spancat/corpus.hpp"
#include "spancat/corpus_io.hpp"
#include "spancat/encoder.hpp"
#include "spancat/folds.hpp"
#include "spancat/metrics.hpp"
#include "spancat/model.hpp"
#include "spancat/render.hpp"
#include "spancat/suggester.hpp"
#include "spancat/synthetic.hpp"
#include "spancat/training.hpp"
#include "spancat/vectors.hpp"
