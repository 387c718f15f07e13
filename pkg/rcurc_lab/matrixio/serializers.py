from rest_framework import serializers


class ObservationFileSerializer(serializers.Serializer):
    """
    Esquema del JSON de observación (schema 1).

    Las listas grandes (máscaras y valores) se validan después con numpy;
    aquí solo se comprueba la estructura de primer nivel.
    """
    schema = serializers.IntegerField(min_value=1, max_value=1)
    shape = serializers.ListField(child=serializers.IntegerField(min_value=1), min_length=2, max_length=2)
    row_idx = serializers.ListField(child=serializers.IntegerField(min_value=0))
    col_idx = serializers.ListField(child=serializers.IntegerField(min_value=0))
    omega_r = serializers.ListField()
    omega_c = serializers.ListField()
    values = serializers.ListField()
