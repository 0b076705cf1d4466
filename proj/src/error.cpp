#include "vulnpred/error.hpp"

namespace vulnpred {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig: return "config error";
    case ErrorKind::kIngest: return "ingest error";
    case ErrorKind::kData: return "data error";
    case ErrorKind::kSchema: return "schema error";
    case ErrorKind::kSplit: return "split error";
    case ErrorKind::kContract: return "contract error";
    case ErrorKind::kUndefined: return "undefined metric";
    case ErrorKind::kDegenerate: return "degenerate fit";
    case ErrorKind::kDivergence: return "divergence";
    case ErrorKind::kTraining: return "training failure";
    case ErrorKind::kTuning: return "tuning failure";
  }
  return "error";
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
      return 1;
    case ErrorKind::kIngest:
    case ErrorKind::kData:
    case ErrorKind::kSchema:
    case ErrorKind::kSplit:
    case ErrorKind::kContract:
    case ErrorKind::kUndefined:
      return 2;
    case ErrorKind::kDegenerate:
    case ErrorKind::kDivergence:
    case ErrorKind::kTraining:
    case ErrorKind::kTuning:
      return 3;
  }
  return 3;
}

}  // namespace vulnpred
