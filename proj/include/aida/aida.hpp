#pragma once

#include "aida/ap_core.hpp"
#include "aida/microcode.hpp"
#include "aida/acsr.hpp"
#include "aida/fc_engine.hpp"
#include "aida/reference.hpp"
#include "aida/cost_model.hpp"
#include "aida/sweep.hpp"
#include "aida/io.hpp"
