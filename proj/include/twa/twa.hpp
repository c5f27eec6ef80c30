#ifndef TWA_TWA_HPP
#define TWA_TWA_HPP

#include "twa/algebra.hpp"
#include "twa/engine.hpp"
#include "twa/errors.hpp"
#include "twa/factor.hpp"
#include "twa/graph.hpp"
#include "twa/ids.hpp"
#include "twa/packing/factors.hpp"
#include "twa/packing/instance.hpp"
#include "twa/packing/maintenance.hpp"
#include "twa/packing/run.hpp"
#include "twa/packing/steering.hpp"
#include "twa/rtree.hpp"
#include "twa/schedule.hpp"
#include "twa/steer/frames.hpp"
#include "twa/steer/service.hpp"
#include "twa/steer/websocket.hpp"
#include "twa/sudoku/generator.hpp"
#include "twa/sudoku/model.hpp"
#include "twa/sudoku/one_on.hpp"
#include "twa/sudoku/oracle.hpp"
#include "twa/sudoku/puzzle.hpp"
#include "twa/sudoku/reasoners.hpp"
#include "twa/sudoku/solver.hpp"
#include "twa/telemetry.hpp"
#include "twa/weight.hpp"

#endif  // TWA_TWA_HPP
