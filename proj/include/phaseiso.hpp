#pragma once

#include <phaseiso/settings.hpp>
#include <phaseiso/error.hpp>
#include <phaseiso/space.hpp>
#include <phaseiso/orthogonality.hpp>
#include <phaseiso/rng.hpp>
#include <phaseiso/phase_map.hpp>
#include <phaseiso/recovery.hpp>
#include <phaseiso/decomposition.hpp>
#include <phaseiso/io.hpp>
#include <phaseiso/harness.hpp>
