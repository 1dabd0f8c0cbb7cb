#pragma once

#include "coagsed/characteristics.hpp"
#include "coagsed/coagulation.hpp"
#include "coagsed/config.hpp"
#include "coagsed/diagnostics.hpp"
#include "coagsed/diagonal.hpp"
#include "coagsed/grid.hpp"
#include "coagsed/io.hpp"
#include "coagsed/kernels.hpp"
#include "coagsed/mild.hpp"
#include "coagsed/params.hpp"
#include "coagsed/splitting.hpp"
#include "coagsed/transport.hpp"
#include "coagsed/util.hpp"
