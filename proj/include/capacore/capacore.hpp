#pragma once

#include "capacore/assignment.hpp"
#include "capacore/cellstore.hpp"
#include "capacore/coreset.hpp"
#include "capacore/distributed.hpp"
#include "capacore/error.hpp"
#include "capacore/estimator.hpp"
#include "capacore/flow.hpp"
#include "capacore/geometry.hpp"
#include "capacore/hashing.hpp"
#include "capacore/io.hpp"
#include "capacore/oracle.hpp"
#include "capacore/params.hpp"
#include "capacore/partition.hpp"
#include "capacore/random.hpp"
#include "capacore/streaming.hpp"
#include "capacore/wire.hpp"
