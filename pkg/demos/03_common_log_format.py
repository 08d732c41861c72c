"""
From an access log to a hit matrix
==================================

Common Log Format lines are keyed by host. Only GET requests whose path maps
to a category and whose timestamp falls in the window count as hits; every
other line is tallied by reason.
"""

from datetime import datetime, timezone

from coclick import filter_users, parse_common_log_file

log = """\
10.0.0.1 - - [28/Sep/1999:10:00:00 +0000] "GET /news HTTP/1.0" 200 512
10.0.0.1 - - [28/Sep/1999:10:00:05 +0000] "GET /news/world?id=7 HTTP/1.0" 200 2048
10.0.0.1 - - [28/Sep/1999:10:01:00 +0000] "GET /sports HTTP/1.0" 404 0
10.0.0.2 - - [28/Sep/1999:11:00:00 +0000] "GET /weather HTTP/1.0" 200 100
10.0.0.2 - - [28/Sep/1999:11:00:03 +0000] "POST /news HTTP/1.0" 200 100
10.0.0.3 - - [29/Sep/1999:00:00:01 +0000] "GET /news HTTP/1.0" 200 512
10.0.0.2 - - [28/Sep/1999:11:02:00 +0000] "GET /favicon.ico HTTP/1.0" 200 10
this line is not a log entry
"""

url_map = {"/news": "news", "/news/world": "news", "/sports": "sports", "/weather": "weather"}
day = (datetime(1999, 9, 28, tzinfo=timezone.utc), datetime(1999, 9, 29, tzinfo=timezone.utc))

matrix, tally = parse_common_log_file(log.splitlines(), url_map, day)
print(matrix.catalog.labels)
for user, row in zip(matrix.users, matrix.counts):
    print(user, row)
print("hits", tally.hits, "skipped", dict(tally.skipped), "malformed lines", tally.errors)

###############################################################################
# The 404 still counts; pass ``status_class="2xx"`` to drop it.
strict, _ = parse_common_log_file(log.splitlines(), url_map, day, status_class="2xx")
print("2xx only:", strict.total_hits, "hits")

###############################################################################
# Activity filter: users with at least two distinct categories.
print(filter_users(matrix, 2).users)
