// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include "tailcast/error.hpp"
#include "tailcast/random.hpp"
#include "tailcast/format.hpp"
#include "tailcast/distributions.hpp"
#include "tailcast/ingest.hpp"
#include "tailcast/diagnostics.hpp"
#include "tailcast/pot.hpp"
#include "tailcast/process.hpp"
#include "tailcast/forecast.hpp"
