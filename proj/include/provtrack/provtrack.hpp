#pragma once

#include "provtrack/principal.hpp"
#include "provtrack/label.hpp"
#include "provtrack/dom.hpp"
#include "provtrack/html_parser.hpp"
#include "provtrack/script.hpp"
#include "provtrack/virtual_clock.hpp"
#include "provtrack/extension.hpp"
#include "provtrack/session_log.hpp"
#include "provtrack/engine.hpp"
#include "provtrack/analyzer.hpp"
#include "provtrack/scenario.hpp"
#include "provtrack/session.hpp"
#include "provtrack/oracle.hpp"
#include "provtrack/bench.hpp"
