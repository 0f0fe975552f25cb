#pragma once

#include "copydraw/error.hpp"
#include "copydraw/types.hpp"
#include "copydraw/session_io.hpp"
#include "copydraw/kinematics.hpp"
#include "copydraw/dtw.hpp"
#include "copydraw/stats.hpp"
#include "copydraw/linmodels.hpp"
#include "copydraw/filter.hpp"
#include "copydraw/psd.hpp"
#include "copydraw/spoc.hpp"
#include "copydraw/mrmr.hpp"
#include "copydraw/random.hpp"
#include "copydraw/parallel.hpp"
#include "copydraw/folds.hpp"
#include "copydraw/marker.hpp"
#include "copydraw/evaluation.hpp"
#include "copydraw/cluster_test.hpp"
#include "copydraw/outcome.hpp"
#include "copydraw/synth.hpp"
#include "copydraw/report.hpp"
