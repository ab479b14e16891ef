#pragma once

#include "abcmi/data_io.hpp"
#include "abcmi/error.hpp"
#include "abcmi/evaluation.hpp"
#include "abcmi/kmeans.hpp"
#include "abcmi/parallel.hpp"
#include "abcmi/random.hpp"
#include "abcmi/report.hpp"
#include "abcmi/selection.hpp"
#include "abcmi/stats.hpp"
