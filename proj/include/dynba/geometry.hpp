#pragma once

#include "dynba/camera.hpp"
#include "dynba/flow.hpp"
#include "dynba/lie.hpp"
