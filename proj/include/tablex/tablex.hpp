#pragma once

#include "tablex/adapter.hpp"
#include "tablex/classify.hpp"
#include "tablex/config.hpp"
#include "tablex/document.hpp"
#include "tablex/encoding.hpp"
#include "tablex/error.hpp"
#include "tablex/evaluation.hpp"
#include "tablex/html_lexer.hpp"
#include "tablex/json_io.hpp"
#include "tablex/labels.hpp"
#include "tablex/levenshtein.hpp"
#include "tablex/linker.hpp"
#include "tablex/naive_bayes.hpp"
#include "tablex/patterns.hpp"
#include "tablex/serializer.hpp"
#include "tablex/unicode.hpp"
