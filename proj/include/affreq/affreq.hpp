#pragma once

#include "affreq/config.hpp"
#include "affreq/csv.hpp"
#include "affreq/error.hpp"
#include "affreq/filtering.hpp"
#include "affreq/geometry.hpp"
#include "affreq/pipeline.hpp"
#include "affreq/pll.hpp"
#include "affreq/signal.hpp"
#include "affreq/time_function.hpp"
#include "affreq/transforms.hpp"
#include "affreq/waveforms.hpp"
