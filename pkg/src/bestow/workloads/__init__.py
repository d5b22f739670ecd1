"""Programs built on the runtime: a sharded hash table, banks, graph search, ping benchmark."""
