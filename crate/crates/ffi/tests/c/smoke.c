#include <stdio.h>
#include <string.h>

#include "bustrace.h"

#define CHECK(cond)                                                     \
  do {                                                                  \
    if (!(cond)) {                                                      \
      const char *err = bt_last_error();                                \
      fprintf(stderr, "%s:%d: %s (%s)\n", __FILE__, __LINE__, #cond,   \
              err ? err : "no error");                                  \
      return 1;                                                         \
    }                                                                   \
  } while (0)

int main(int argc, char **argv) {
  if (argc != 4) {
    fprintf(stderr, "usage: smoke MODEL GOOD_FEED BAD_FEED\n");
    return 2;
  }

  BtModel *model = NULL;
  CHECK(bt_model_load(argv[1], &model) == BT_STATUS_OK);
  size_t n = bt_model_window_len(model);
  CHECK(n == 4);

  BtTuple window[4];
  for (size_t i = 0; i < n; i++) {
    window[i].lat = 42.35 + 1e-4 * (double)i;
    window[i].lon = 13.39 + 2e-4 * (double)i;
    window[i].speed = 20.0;
  }
  BtTuple next;
  CHECK(bt_predict_next(model, window, n, &next) == BT_STATUS_OK);
  BtTuple trace[3];
  CHECK(bt_rollout(model, window, n, 3, trace) == BT_STATUS_OK);
  CHECK(trace[0].lat == next.lat && trace[0].lon == next.lon);
  CHECK(bt_predict_next(model, window, 2, &next) == BT_STATUS_INVALID_ARGUMENT);
  CHECK(strstr(bt_last_error(), "expects 4") != NULL);
  bt_model_free(model);

  BtFeed *feed = NULL;
  BtReport *report = NULL;
  CHECK(bt_feed_load(argv[2], &feed) == BT_STATUS_OK);
  CHECK(bt_feed_validate(feed, &report) == BT_STATUS_OK);
  CHECK(bt_report_error_count(report) == 0);
  bt_report_free(report);
  bt_feed_free(feed);

  CHECK(bt_feed_load(argv[3], &feed) == BT_STATUS_OK);
  CHECK(bt_feed_validate(feed, &report) == BT_STATUS_OK);
  CHECK(bt_report_has_rule(report, "FK_STOP"));
  printf("%s", bt_report_text(report));
  bt_report_free(report);
  bt_feed_free(feed);

  printf("bustrace %s ok\n", bt_version());
  return 0;
}
