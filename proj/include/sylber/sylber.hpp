#pragma once

#include "sylber/codec.hpp"
#include "sylber/discriminability.hpp"
#include "sylber/distill.hpp"
#include "sylber/dtw.hpp"
#include "sylber/error.hpp"
#include "sylber/io.hpp"
#include "sylber/matrix.hpp"
#include "sylber/metrics.hpp"
#include "sylber/quantizer.hpp"
#include "sylber/segmenter.hpp"
#include "sylber/types.hpp"
