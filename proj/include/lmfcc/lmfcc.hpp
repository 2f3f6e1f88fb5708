#pragma once

#include "lmfcc/config.hpp"
#include "lmfcc/core.hpp"
#include "lmfcc/dataio.hpp"
#include "lmfcc/encoder.hpp"
#include "lmfcc/evalkit.hpp"
#include "lmfcc/learn.hpp"
#include "lmfcc/linalg.hpp"
#include "lmfcc/melcepstrum.hpp"
#include "lmfcc/metrics.hpp"
#include "lmfcc/model_io.hpp"
#include "lmfcc/pca.hpp"
#include "lmfcc/spectral.hpp"
