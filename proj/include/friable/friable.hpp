#pragma once

// Umbrella header for the friable Turan-Kubilius toolkit.

#include "friable/additive.hpp"
#include "friable/forms.hpp"
#include "friable/linalg.hpp"
#include "friable/model.hpp"
#include "friable/numeric.hpp"
#include "friable/primes.hpp"
#include "friable/saddle.hpp"
#include "friable/smooth.hpp"
#include "friable/study.hpp"
#include "friable/tk.hpp"
