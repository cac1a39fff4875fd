#!/usr/bin/env python3
"""Launch the live bridge and open the interactive console.

    python demos/live_server.py            # serves on 127.0.0.1:8000

Then browse to http://127.0.0.1:8000/ui/ (build the console first with
`npm install && npm run build` inside frontend/).  Pick a scenario, start a
session, click links to take them down or bring them back, and watch the
forwarding tree re-converge.  Useful toggles: the client's primary link
(green node's first edge) triggers the canonical fail-over.

The same service is available as `routesim serve`.
"""

import uvicorn

from routesim.live import create_app

if __name__ == "__main__":
    uvicorn.run(create_app(), host="127.0.0.1", port=8000)
