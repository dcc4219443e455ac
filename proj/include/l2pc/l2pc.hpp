#pragma once

#include "l2pc/control.hpp"
#include "l2pc/fixedpoint.hpp"
#include "l2pc/lattice.hpp"
#include "l2pc/params.hpp"
#include "l2pc/protocol.hpp"
#include "l2pc/ring.hpp"
#include "l2pc/sampling.hpp"
#include "l2pc/secretshare.hpp"
#include "l2pc/transport.hpp"
