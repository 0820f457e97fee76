#include <stdio.h>
#include <string.h>

#include "coinweigh.h"

#define CHECK(cond)                                                   \
  do {                                                                \
    if (!(cond)) {                                                    \
      fprintf(stderr, "%s:%d: %s (%s)\n", __FILE__, __LINE__, #cond,  \
              cw_last_error_message());                               \
      return 1;                                                       \
    }                                                                 \
  } while (0)

int main(void) {
  const uint64_t forged[3] = {7, 0, 4};
  CwOracle *oracle = NULL;
  CHECK(cw_oracle_new(3, forged, &oracle) == CW_STATUS_OK);

  CwTrace *trace = NULL;
  CHECK(cw_search(oracle, &trace) == CW_STATUS_OK);
  CwTraceSummary s;
  CHECK(cw_trace_summary(trace, &s) == CW_STATUS_OK);
  CHECK(s.total == 5 && cw_oracle_query_count(oracle) == 5);
  CHECK(s.recovered[0] == 0 && s.recovered[1] == 4 && s.recovered[2] == 7);

  char *json = NULL;
  CHECK(cw_trace_to_json(trace, &json) == CW_STATUS_OK);
  CHECK(strstr(json, "\"recovered\"") != NULL);
  cw_string_free(json);
  cw_trace_free(trace);
  cw_oracle_free(oracle);

  const uint64_t bad[3] = {1, 1, 2};
  CHECK(cw_oracle_new(3, bad, &oracle) == CW_STATUS_INVALID_INSTANCE);
  CHECK(strlen(cw_last_error_message()) > 0);

  uint8_t digits[3];
  CHECK(cw_decode_row(2, 1, digits) == CW_STATUS_OK);
  CHECK(digits[0] == 1 && digits[1] == 1 && digits[2] == 0);

  const uint64_t msgs[3] = {1, 0, 0};
  CwSession *session = NULL;
  CHECK(cw_channel_session(1, msgs, &session) == CW_STATUS_OK);
  CwSessionSummary ss;
  CHECK(cw_session_summary(session, &ss) == CW_STATUS_OK);
  CHECK(ss.total == 2 && ss.decoded[0] == 1 && ss.decoded[1] == 0);
  cw_session_free(session);

  puts("ok");
  return 0;
}
