#pragma once

#include "mdlpart/code_length.hpp"
#include "mdlpart/encoding.hpp"
#include "mdlpart/evalkit.hpp"
#include "mdlpart/homogeneity.hpp"
#include "mdlpart/io.hpp"
#include "mdlpart/partition_search.hpp"
#include "mdlpart/regression.hpp"
#include "mdlpart/simgen.hpp"
#include "mdlpart/types.hpp"
