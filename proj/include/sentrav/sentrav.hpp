#pragma once

// Umbrella header.

#include "sentrav/checkpoint.hpp"
#include "sentrav/corpus.hpp"
#include "sentrav/decoder.hpp"
#include "sentrav/encoder.hpp"
#include "sentrav/errors.hpp"
#include "sentrav/fileio.hpp"
#include "sentrav/kernels.hpp"
#include "sentrav/model.hpp"
#include "sentrav/numerics.hpp"
#include "sentrav/optim.hpp"
#include "sentrav/pca.hpp"
#include "sentrav/pipeline.hpp"
#include "sentrav/rng.hpp"
#include "sentrav/transform.hpp"
#include "sentrav/traversal.hpp"
#include "sentrav/vocab.hpp"
