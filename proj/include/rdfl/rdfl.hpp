#pragma once

#include "rdfl/error.hpp"
#include "rdfl/model.hpp"
#include "rdfl/netsim.hpp"
#include "rdfl/ring.hpp"
#include "rdfl/store.hpp"
#include "rdfl/sync.hpp"
#include "rdfl/train.hpp"
