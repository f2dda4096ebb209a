#pragma once

#include "dact/committee.hpp"
#include "dact/corpus.hpp"
#include "dact/cues.hpp"
#include "dact/errors.hpp"
#include "dact/eval.hpp"
#include "dact/experiment.hpp"
#include "dact/random.hpp"
#include "dact/rule.hpp"
#include "dact/synthetic.hpp"
#include "dact/tbl.hpp"
