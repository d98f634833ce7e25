#pragma once

#include "wbce/waveform.hpp"
#include "wbce/channel.hpp"
#include "wbce/dictionary.hpp"
#include "wbce/analysis.hpp"
#include "wbce/solvers.hpp"
#include "wbce/harness.hpp"
#include "wbce/config.hpp"
