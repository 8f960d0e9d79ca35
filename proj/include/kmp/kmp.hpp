#pragma once

#include "kmp/domains.hpp"
#include "kmp/gegenbauer.hpp"
#include "kmp/kernels.hpp"
#include "kmp/mp_asymptotics.hpp"
#include "kmp/spectrum_lab.hpp"
#include "kmp/krr_engine.hpp"
#include "kmp/gauss_equiv.hpp"
#include "kmp/config.hpp"
#include "kmp/io.hpp"
#include "kmp/runner.hpp"
