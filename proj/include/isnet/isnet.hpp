// Umbrella header.
#pragma once

#include "isnet/audio.hpp"
#include "isnet/checkpoint.hpp"
#include "isnet/cirm.hpp"
#include "isnet/data.hpp"
#include "isnet/eval.hpp"
#include "isnet/model.hpp"
#include "isnet/nn.hpp"
#include "isnet/optim.hpp"
#include "isnet/selfcheck.hpp"
#include "isnet/stft.hpp"
#include "isnet/subband.hpp"
#include "isnet/tensor.hpp"
#include "isnet/train.hpp"
#include "isnet/util.hpp"
