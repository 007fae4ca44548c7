"""Yellow-pages registry: service labels mapped to provider agents."""
from __future__ import annotations


class Directory:
    def __init__(self):
        self._services: dict[str, set[str]] = {}

    def register(self, agent: str, service: str) -> None:
        self._services.setdefault(service, set()).add(agent)

    def deregister(self, agent: str, service: str) -> None:
        providers = self._services.get(service)
        if providers is None:
            return
        providers.discard(agent)
        if not providers:
            del self._services[service]

    def prune_agent(self, agent: str) -> None:
        for service in list(self._services):
            self.deregister(agent, service)

    def lookup(self, service: str | None = None) -> dict[str, list[str]]:
        if service is not None:
            return {service: sorted(self._services.get(service, ()))}
        return {s: sorted(p) for s, p in sorted(self._services.items())}

    def services_of(self, agent: str) -> list[str]:
        return sorted(s for s, p in self._services.items() if agent in p)
